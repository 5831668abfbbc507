"""
Модуль для загрузки и управления настройками приложения.
"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

# Загрузка .env файла
load_dotenv()


# Значения по умолчанию, если в solver.yaml нет нужного ключа
DEFAULT_SOLVER_CONFIG: Dict[str, Any] = {
    "solver": {
        "tol": 1e-8,
        "max_iter": 200,
        "step_fraction": 0.98,
        "redundancy_threshold": 1e-10,
    },
    "tolerances": {
        "herm": 1e-12,
        "psd": 1e-9,
        "trace": 1e-9,
        "assumption": 1e-6,
    },
    "value_net": {
        "cap": 20000,
        "unitaries_per_spectrum": 4,
        "probe_factor": 10,
    },
    "bilinear": {
        "restarts": 8,
        "max_outer": 100,
        "tol": 1e-7,
        "certificate_tol": 1e-6,
    },
    "cli": {
        "seed": 42,
        "probes": 20,
    },
}


class Settings:
    """Класс для управления всеми настройками приложения."""

    def __init__(self):
        # Параллелизм и логирование
        self.threads = int(os.getenv("QMDP_THREADS", str(os.cpu_count() or 1)))
        self.log_level = os.getenv("QMDP_LOG_LEVEL", "INFO").upper()

        self.base_dir = Path(
            os.path.dirname(os.path.dirname(os.path.dirname(__file__)))
        )
        self.configs_dir = self.base_dir / "configs"
        self.config_path = Path(
            os.getenv("QMDP_CONFIG", str(self.configs_dir / "solver.yaml"))
        )

        self._solver_config: Optional[Dict[str, Any]] = None

    def load_solver_config(self, file_path: Optional[str] = None) -> Dict[str, Any]:
        """
        Загружает параметры решателей из YAML файла.

        Отсутствующие ключи дополняются значениями по умолчанию.

        Args:
            file_path: Путь к YAML файлу. По умолчанию configs/solver.yaml.

        Returns:
            Словарь секций конфигурации.
        """

        path = Path(file_path) if file_path else self.config_path

        if not path.exists():
            raise FileNotFoundError(f"Файл с параметрами решателя не найден: {path}")

        with open(path, "r", encoding="utf-8") as f:
            loaded = yaml.safe_load(f) or {}

        config = {}
        for section, defaults in DEFAULT_SOLVER_CONFIG.items():
            merged = dict(defaults)
            merged.update(loaded.get(section) or {})
            config[section] = merged

        return config

    @property
    def solver_config(self) -> Dict[str, Any]:
        """Конфигурация решателей (кэшируется после первого чтения)."""
        if self._solver_config is None:
            try:
                self._solver_config = self.load_solver_config()
            except FileNotFoundError:
                self._solver_config = {
                    section: dict(values)
                    for section, values in DEFAULT_SOLVER_CONFIG.items()
                }
        return self._solver_config

    def get(self, section: str, key: str) -> Any:
        """Возвращает значение параметра из секции конфигурации."""
        return self.solver_config[section][key]


# Создаем глобальный экземпляр настроек
settings = Settings()
