from importlib.metadata import PackageNotFoundError, version

try:
    VERSION = version("little-bench")
except PackageNotFoundError:
    VERSION = "0+unknown"
