# Models package
from .schemas import *
