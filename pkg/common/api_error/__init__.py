# common/api_error/__init__.py
from .lab_error import *
from .config_error import *
