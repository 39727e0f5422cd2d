from .store import Store

PACKAGE_NAME = "mypkg"
