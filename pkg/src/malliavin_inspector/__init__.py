__version__ = "0.1.0"

from .cli import MalliavinInspector, main  # noqa: E402

if __name__ == "__main__":
    main()
