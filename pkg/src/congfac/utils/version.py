def get_version() -> str:
    import importlib.metadata
    try:
        return importlib.metadata.version("congfac")
    except importlib.metadata.PackageNotFoundError:
        # running from a source checkout.
        return "0+unknown"
