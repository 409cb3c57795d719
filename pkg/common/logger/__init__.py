# common/logger/__init__.py
from .logger import *
from .stage_timer import *
