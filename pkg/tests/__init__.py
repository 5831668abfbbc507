"""Тесты для пакета qmdp."""
