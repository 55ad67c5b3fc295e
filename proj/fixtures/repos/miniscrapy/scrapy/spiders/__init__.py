class Spider:
    name = None
    custom_settings = None

    def __init__(self, name=None, **kwargs):
        if name is not None:
            self.name = name
        self.__dict__.update(kwargs)
        if not hasattr(self, "start_urls"):
            self.start_urls = []

    def parse(self, response, **kwargs):
        raise NotImplementedError(f"{self.__class__.__name__}.parse callback is not defined")
