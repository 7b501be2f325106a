"""
Export plugins. Each module defines a ``Controller`` with an
``extension`` and an ``export(data) -> bytes`` static method.
"""
import importlib
import pkgutil

from findability.exceptions import ConfigurationError


class BaseController:

    extension = ""

    @staticmethod
    def export(data) -> bytes:
        raise NotImplementedError


def get_plugins():
    for module in pkgutil.iter_modules(__path__):
        yield module.name


def get_controller(name: str):
    if name not in set(get_plugins()):
        raise ConfigurationError(f"plugin: no exporter named {name!r}")
    module = importlib.import_module(f"{__name__}.{name}")
    return module.Controller
