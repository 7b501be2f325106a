import importlib
import os


class ImproperlyConfigured(Exception):
    pass


ENVIRONMENT_VARIABLE = "FINDABILITY_SETTINGS_MODULE"


class Settings:
    def __init__(self, settings_module=None):
        self.SETTINGS_MODULE = (
            settings_module
            or os.environ.get(ENVIRONMENT_VARIABLE)
            or "findability.conf.pro"
        )

        try:
            mod = importlib.import_module(self.SETTINGS_MODULE)
        except ImportError as exc:
            raise ImproperlyConfigured(
                f"Settings module {self.SETTINGS_MODULE!r} could not be imported: {exc}"
            ) from exc

        for setting in dir(mod):
            if setting.isupper():  # only allow upper-case settings
                setattr(self, setting, getattr(mod, setting))

        if self.MIN_TOKEN_LENGTH < 1:
            raise ImproperlyConfigured("MIN_TOKEN_LENGTH must be >= 1")
        if not 1 <= self.CUTOFF <= self.MAX_CUTOFF:
            raise ImproperlyConfigured("CUTOFF must lie in [1, MAX_CUTOFF]")

    def __repr__(self):
        return f'{self.__class__.__name__}: "{self.SETTINGS_MODULE}"'


settings = Settings()
