"""
Модуль для работы с командной строкой.
"""

import argparse
import sys
from typing import Any, Callable, Dict

from .errors import (
    DimensionMismatchError,
    InvariantViolationError,
    ProblemFormatError,
    QmdpError,
)
from .settings import settings
from .utils import set_global_level, setup_logger

# Настройка логирования
logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_FORMAT = 2
EXIT_SOLVER = 3

MODES = (
    "open-sdp",
    "open-dual",
    "closed-sdp",
    "closed-dual",
    "bil-open",
    "bil-closed",
    "value-net",
    "value-closed",
    "rollout",
    "check-assumptions",
)


def exit_code_for(error: BaseException) -> int:
    """Код возврата для исключения: 1 - инварианты, 2 - ввод/вывод и формат, 3 - решатель."""
    if isinstance(error, (ProblemFormatError, OSError)):
        return EXIT_FORMAT
    if isinstance(error, (InvariantViolationError, DimensionMismatchError)):
        return EXIT_INVARIANT
    # SolverError, NumericalDegeneracyError и прочие ошибки решателя
    return EXIT_SOLVER


class CLI:
    """Класс для обработки аргументов командной строки."""

    def __init__(self):
        """Инициализирует обработчик командной строки."""
        self.parser = self._create_parser()

    def _create_parser(self) -> argparse.ArgumentParser:
        """
        Создает парсер аргументов командной строки.

        Returns:
            Настроенный парсер аргументов.
        """

        parser = argparse.ArgumentParser(
            prog="qmdp",
            description="qmdp - оптимальное управление квантовыми марковскими процессами принятия решений",
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--verbose", action="store_true", help="Подробный вывод (уровень DEBUG)")

        commands = parser.add_subparsers(dest="command", required=True)

        # validate
        validate = commands.add_parser(
            "validate", help="Проверить файл задачи",
            parents=[common],
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        validate.add_argument("path", help="Файл задачи (qmdp или classical-mdp)")

        # embed-classical
        embed = commands.add_parser(
            "embed-classical", help="Вложить классический MDP в q-MDP",
            parents=[common],
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        embed.add_argument("path", help="Файл classical-mdp")
        embed.add_argument(
            "--mu0", type=str, default=None,
            help="Начальное распределение через запятую (по умолчанию из файла или равномерное)",
        )
        embed.add_argument("--output", type=str, default=None, help="Путь к файлу q-MDP")

        # solve
        solve = commands.add_parser(
            "solve", help="Решить задачу в выбранном режиме",
            parents=[common],
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        solve.add_argument("path", help="Файл задачи")
        solve.add_argument("--mode", choices=MODES, required=True, help="Режим решения")
        solve.add_argument("--tol", type=float, default=float(settings.get("solver", "tol")),
                           help="Допуск внутренней точки")
        solve.add_argument("--seed", type=int, default=int(settings.get("cli", "seed")),
                           help="Зерно генератора случайных чисел")
        solve.add_argument("--output", type=str, default=None,
                           help="Путь к отчету (по умолчанию рядом с файлом задачи)")
        solve.add_argument("--no-timings", action="store_true", help="Не записывать время выполнения в отчет")
        solve.add_argument("--net-resolution", type=int, default=4, help="Разрешение сетки для value-net")
        solve.add_argument("--horizon", type=int, default=None,
                           help="Горизонт rollout (по умолчанию по правилу хвоста)")
        solve.add_argument("--policy", type=str, default=None,
                           help="Файл политики для rollout (по умолчанию равномерная открытая)")
        solve.add_argument("--restarts", type=int, default=int(settings.get("bilinear", "restarts")),
                           help="Число запусков Франк-Вульфа")
        solve.add_argument("--max-outer", type=int, default=int(settings.get("bilinear", "max_outer")),
                           help="Максимум итераций Франк-Вульфа")
        solve.add_argument("--probes", type=int, default=int(settings.get("cli", "probes")),
                           help="Число проб для check-assumptions")

        return parser

    def parse_args(self, args=None) -> argparse.Namespace:
        """
        Разбирает аргументы командной строки.

        Args:
            args: Аргументы для разбора. По умолчанию берутся из sys.argv.

        Returns:
            Объект с разобранными аргументами.
        """

        return self.parser.parse_args(args)

    def convert_args_to_dict(self, args: argparse.Namespace) -> Dict[str, Any]:
        return vars(args)

    def run(self, handlers: Dict[str, Callable[[argparse.Namespace], int]], argv=None) -> int:
        """
        Разбирает аргументы, вызывает обработчик команды и возвращает код выхода.

        Args:
            handlers: Обработчики по имени подкоманды.
            argv: Аргументы (по умолчанию sys.argv).
        """

        args = self.parse_args(argv)
        set_global_level("DEBUG" if args.verbose else settings.log_level)

        logger.debug("Запуск с параметрами:")
        for arg_name, arg_value in self.convert_args_to_dict(args).items():
            logger.debug(f"  {arg_name} = {arg_value}")

        try:
            return handlers[args.command](args)
        except QmdpError as e:
            logger.error(f"Ошибка: {e}")
            return exit_code_for(e)
        except OSError as e:
            logger.error(f"Ошибка ввода-вывода: {e}")
            return EXIT_FORMAT

    def parse_and_run(self, handlers: Dict[str, Callable[[argparse.Namespace], int]]) -> None:
        """Запускает команду и завершает процесс с ее кодом выхода."""

        try:
            code = self.run(handlers)
        except KeyboardInterrupt:
            logger.info("Операция прервана пользователем")
            code = EXIT_SOLVER
        sys.exit(code)
