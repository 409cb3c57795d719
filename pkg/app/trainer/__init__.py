# app/trainer/__init__.py
from .backward import *
from .trajectory import *
from .sgd import *
