# app/theory/__init__.py
from .special_functions import *
from .densities import *
from .prediction import *
