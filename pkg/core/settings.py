"""
Settings for the minikiki verifier.

Every value can be overridden from the environment or from a .env file next
to manage.py. Command-line flags take precedence for a single run.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

CORPUS_DIR = BASE_DIR / 'corpus'

DEBUG = os.getenv('DEBUG', 'False').lower() in ('true', '1', 'on')

# Unwinding
UNWIND_MAX = int(os.getenv('MINIKIKI_UNWIND_MAX', '64'))

# Propositional back end (any solver name understood by python-sat)
SOLVER_NAME = os.getenv('MINIKIKI_SOLVER', 'minisat22')
# 0 means unlimited
CONFLICT_BUDGET = int(os.getenv('MINIKIKI_CONFLICT_BUDGET', '0'))
SOLVER_RESTART_EVERY = int(os.getenv('MINIKIKI_SOLVER_RESTART_EVERY', '0'))

# Invariant inference
STRATEGY = os.getenv('MINIKIKI_STRATEGY', 'binsearch')
GENERIC_MAX_ROUNDS = int(os.getenv('MINIKIKI_GENERIC_MAX_ROUNDS', '512'))
SYMBOLIC_PATH_CAP = int(os.getenv('MINIKIKI_SYMBOLIC_PATH_CAP', '64'))
# Depths a refinement step may keep an unchanged invariant before the next domain takes over
LADDER_STABLE_DEPTHS = int(os.getenv('MINIKIKI_LADDER_STABLE_DEPTHS', '3'))

# Termination
RANKING_MAX_COMPONENTS = int(os.getenv('MINIKIKI_RANKING_MAX_COMPONENTS', '3'))
RANKING_MAX_EXPONENT = int(os.getenv('MINIKIKI_RANKING_MAX_EXPONENT', '3'))
RANKING_MAX_REFINEMENTS = int(os.getenv('MINIKIKI_RANKING_MAX_REFINEMENTS', '64'))
NONTERM_FIRST_ROUNDS = int(os.getenv('MINIKIKI_NONTERM_FIRST_ROUNDS', '3'))
NONTERM_MAX_DEPTH = int(os.getenv('MINIKIKI_NONTERM_MAX_DEPTH', '16'))
PROGRESSION_EXCLUSION_CAP = int(os.getenv('MINIKIKI_PROGRESSION_EXCLUSION_CAP', '32'))

# Concrete interpreters
STEP_LIMIT = int(os.getenv('MINIKIKI_STEP_LIMIT', '100000'))

LOG_LEVEL = os.getenv('LOG_LEVEL', 'DEBUG' if DEBUG else 'WARNING').upper()
LOG_FILE = os.getenv('LOG_FILE', '')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'standard': {
            'format': '%(asctime)s - %(levelname)s - %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'standard',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
}

if LOG_FILE:
    LOGGING['handlers']['file'] = {
        'class': 'logging.FileHandler',
        'filename': LOG_FILE,
        'formatter': 'standard',
    }
    LOGGING['root']['handlers'] = ['file']
