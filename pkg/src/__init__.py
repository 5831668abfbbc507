"""
qmdp - оптимальное управление квантовыми MDP.

Пакет содержит SDP-формулировки, сеточные и билинейные решатели и
командную строку для файлов задач.
"""

__version__ = "0.1.0"
__author__ = "qmdp team"
