import os
from pathlib import Path
from dotenv import load_dotenv

BASE_DIR = Path(__file__).resolve().parent.parent

# Optional .env next to the service; real environment variables win
load_dotenv(BASE_DIR / '.env', override=False)

LOG_LEVEL = os.getenv('RULECACHE_LOG_LEVEL', 'INFO').upper()
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

# Capacity sweep after every simulation event (slow; meant for test runs)
DEBUG_INVARIANTS = os.getenv('RULECACHE_DEBUG_INVARIANTS', 'False') == 'True'

# Replications run in a process pool when > 1
WORKERS = int(os.getenv('RULECACHE_WORKERS', '1'))

OUT_DIR = Path(os.getenv('RULECACHE_OUT_DIR', 'results'))

REPLICATIONS = int(os.getenv('RULECACHE_REPLICATIONS', '20'))
