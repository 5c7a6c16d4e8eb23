"""A pytest plugin that provides fockpath simulator settings, reports and a command line runner as fixtures."""

from .plugin import CliResult, parse_multi_setting_args

__all__ = ['CliResult', 'parse_multi_setting_args']

__version__ = '1.0.0'
