import os

SECRET_KEY = os.getenv(
    'ROLENET_SECRET_KEY',
    'rolenet-insecure-only-used-by-management-commands',
)

DEBUG = os.getenv('ROLENET_DEBUG', 'False').lower() in {'1', 'true', 'yes', 'on'}


# Application definition

INSTALLED_APPS = [
    'roles',
]

# The library never touches a database; the test runner skips setup.
DATABASES = {}


# Model fitting defaults (overridable per run through --config or flags)

ROLENET = {
    'N_RESTARTS': int(os.getenv('ROLENET_N_RESTARTS', '5')),
    'TOL': float(os.getenv('ROLENET_TOL', '1e-6')),
    'MAX_INNER': int(os.getenv('ROLENET_MAX_INNER', '200')),
    'MAX_OUTER': int(os.getenv('ROLENET_MAX_OUTER', '100')),
    'JITTER': float(os.getenv('ROLENET_JITTER', '1e-8')),
    'IS_SAMPLES': int(os.getenv('ROLENET_IS_SAMPLES', '1000')),
    'THREADS': int(os.getenv('ROLENET_THREADS', str(os.cpu_count() or 1))),
}


# Logging

LOG_LEVEL = os.getenv('ROLENET_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '[{levelname}] {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'roles': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}
