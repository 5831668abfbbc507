#!/usr/bin/env python3
"""
Скрипт для запуска qmdp из любой директории.

    python scripts/qmdp.py validate problem.json
    python scripts/qmdp.py solve problem.json --mode closed-sdp
"""

import sys
from pathlib import Path

# Корень проекта в путь для импортов src.*
project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from src.main import main  # noqa: E402

if __name__ == "__main__":
    main()
