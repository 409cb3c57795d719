# common/scripts/__init__.py
from .write_to_file import *
from .run_parallel import *
