from findability.conf._base import *

# Config
DEBUG = False

LOGGERS["loggers"]["user_info"]["level"] = "WARNING"
