import os
from pathlib import Path
import sys

from findability.conf import ImproperlyConfigured

# Paths
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = BASE_DIR / "data"
LOG_DIR = Path(
    os.environ.get("FINDABILITY_LOG_DIR", Path.home() / ".cache" / "findability")
)

# Config
DEBUG = False

# Analysis
LOWERCASE = True
MIN_TOKEN_LENGTH = 2
STEMMING = False
STOPWORDS_FILE = DATA_DIR / "stopwords.txt"

# Retrieval models
DEFAULT_MODEL = "bm25"
BM25_K1 = 1.2
BM25_B = 0.75
LMDIR_MU = 1000.0
PL2_C = 1.0

# Convenience function
CONVENIENCE_FORM = "inverse"
CUTOFF = 100
MAX_CUTOFF = 10000
DECAY_DENOMINATOR = 3.0
SWEEP_CUTOFFS = tuple(range(10, 101, 10))

# Known-item query generation
QUERY_LENGTH = 4.0
LAMBDA = 0.0
QUERY_FRACTION = 0.10
QUERY_CAP = 50
QUERY_FLOOR = 1
QUERY_STRATEGY = "popular_discriminative"
SEED = 0

# Retrievability query set
UNIGRAM_MIN_CF = 5
BIGRAM_MIN_CF = 5
MAX_RETRIEVABILITY_QUERIES = 200_000

# Reporting
LORENZ_MAX_POINTS = 10_000
PROGRESS_EVERY = 1000
SMALL_SAMPLE = 30

# Concurrency, 0 lets the thread pool pick its size
try:
    THREADS = int(os.environ.get("FINDABILITY_THREADS", "1"))
except ValueError:
    raise ImproperlyConfigured(
        f"FINDABILITY_THREADS must be an integer, got {os.environ['FINDABILITY_THREADS']!r}"
    ) from None

# Logging
LOGGERS = {
    "version": 1,
    "disable_existing_loggers": False,
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "stream": sys.stderr,
            "formatter": "basic",
        },
        "audit_file": {
            "class": "logging.handlers.RotatingFileHandler",
            "maxBytes": 5000000,
            "backupCount": 1,
            "filename": LOG_DIR / "findability.error",
            "encoding": "utf-8",
            "formatter": "basic",
            "delay": True,
        },
    },
    "formatters": {
        "basic": {
            "style": "{",
            "format": "{asctime:s} [{levelname:s}] -- {name:s}: {message:s}",
        }
    },
    "loggers": {
        "user_info": {
            "handlers": ("console",),
            "level": "INFO" if DEBUG is False else "DEBUG",
        },
        "audit": {"handlers": ("audit_file",), "level": "ERROR"},
        "global": {
            "handlers": ("console",),
            "level": "INFO" if DEBUG is False else "DEBUG",
        },
    },
}
