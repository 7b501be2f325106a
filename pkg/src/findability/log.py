import copy
import logging
import logging.config
from typing import Callable

from findability.conf import settings


def _configure(loggers: dict) -> None:
    try:
        settings.LOG_DIR.mkdir(parents=True, exist_ok=True)
    except OSError:
        # read-only home, keep console logging only
        loggers = copy.deepcopy(loggers)
        loggers["handlers"].pop("audit_file", None)
        loggers["loggers"]["audit"]["handlers"] = ()
    logging.config.dictConfig(loggers)


_configure(settings.LOGGERS)


def logged(cls) -> Callable:
    "Class decorator for logging purposes"

    cls.logger = logging.getLogger("user_info." + cls.__qualname__)
    cls.logger_err = logging.getLogger("audit." + cls.__qualname__)

    return cls
