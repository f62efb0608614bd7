from .adr import *
from .report import *
