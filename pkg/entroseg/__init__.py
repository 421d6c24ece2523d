from .entroseg import Segmenter
from .utils import utils

__version__ = "1.0"
