"""
Вспомогательные функции для работы приложения.
"""

import os
import logging
import tempfile
from pathlib import Path
from typing import Union

# Настройка логирования
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)

logger = logging.getLogger(__name__)

def setup_logger(name: str, level: int = logging.INFO) -> logging.Logger:
    """Создает и настраивает логгер с заданным именем и уровнем."""

    logger = logging.getLogger(name)
    logger.setLevel(level)
    return logger

def set_global_level(level: Union[int, str]) -> None:
    """Меняет уровень логирования у корневого логгера и всех логгеров пакета."""

    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    logging.getLogger().setLevel(level)
    for name, item in logging.Logger.manager.loggerDict.items():
        if name.startswith("src.") and isinstance(item, logging.Logger):
            item.setLevel(level)

def atomic_write_text(path: Union[str, Path], text: str) -> str:
    """
    Записывает текст в файл атомарно: временный файл рядом с целевым + rename.

    Args:
        path: Путь к итоговому файлу.
        text: Содержимое (UTF-8).

    Returns:
        Путь к записанному файлу.
    """

    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    os.makedirs(directory, exist_ok=True)

    fd, tmp_path = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise

    return str(path)
