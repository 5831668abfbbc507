"""
Решатели q-MDP: операторы T/T_w, полуопределенные задачи, функции
ценности, билинейные программы и проверка допущений.

Модули импортируются напрямую (src.app.qsolve.sdp и т.д.).
"""
