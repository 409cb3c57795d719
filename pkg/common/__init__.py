# common/__init__.py
from .logger import *
from .config import *
from .api_error import *
from .context_vars import *
