__version__ = "0.1.0"
__name_public__ = "loop-bie"
