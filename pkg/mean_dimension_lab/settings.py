"""
Django settings for mean_dimension_lab project.

The project has no web surface; Django provides configuration, management
commands and the test runner for the `dynamics` app.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.0/ref/settings/
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from .env file
load_dotenv(BASE_DIR / '.env')


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'mean-dimension-lab-local-key')

DEBUG = os.getenv('DJANGO_DEBUG', '0') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "dynamics",
]

# Estimators keep no state between runs
DATABASES = {}

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Estimator budgets
# Exact solvers stop after this many branch-and-bound nodes
DYNAMICS_NODE_BUDGET = int(os.getenv('DYNAMICS_NODE_BUDGET', '10000000'))
# Largest point set enumerate_points will materialize
DYNAMICS_ENUMERATION_BUDGET = int(os.getenv('DYNAMICS_ENUMERATION_BUDGET', str(2 ** 20)))
# Largest point set for pairwise distance matrices
DYNAMICS_DENSE_LIMIT = int(os.getenv('DYNAMICS_DENSE_LIMIT', '4096'))
# Closed-form symbolic counts are re-solved by branch and bound up to this size
DYNAMICS_CROSS_CHECK_LIMIT = int(os.getenv('DYNAMICS_CROSS_CHECK_LIMIT', str(2 ** 12)))
DYNAMICS_MONTE_CARLO_DRAWS = int(os.getenv('DYNAMICS_MONTE_CARLO_DRAWS', '20000'))
DYNAMICS_ITINERARY_BUDGET = int(os.getenv('DYNAMICS_ITINERARY_BUDGET', '200000'))

# Rate extraction
DYNAMICS_TAIL_FRACTION = float(os.getenv('DYNAMICS_TAIL_FRACTION', '0.5'))
DYNAMICS_RATE_STATISTIC = os.getenv('DYNAMICS_RATE_STATISTIC', 'increment')
DYNAMICS_SPREAD_THRESHOLD = float(os.getenv('DYNAMICS_SPREAD_THRESHOLD', '0.25'))

# Batch runner
DYNAMICS_MAX_JOBS = int(os.getenv('DYNAMICS_MAX_JOBS', '2'))
DYNAMICS_OUTPUT_DIR = Path(os.getenv('DYNAMICS_OUTPUT_DIR', str(BASE_DIR / 'output')))


LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "dynamics": {
            "handlers": ["console"],
            "level": os.getenv('DYNAMICS_LOG_LEVEL', 'INFO'),
        },
    },
}
