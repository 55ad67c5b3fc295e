class Headers(dict):
    def getlist(self, key, def_val=None):
        value = self.get(key, def_val)
        if value is None:
            return []
        return value if isinstance(value, list) else [value]


class Response:
    def __init__(self, url, status=200, headers=None, body=b"", request=None):
        self.url = url
        self.status = status
        self.headers = Headers(headers or {})
        self.body = body
        self.request = request

    def replace(self, **kwargs):
        for key in ("url", "status", "headers", "body", "request"):
            kwargs.setdefault(key, getattr(self, key))
        return self.__class__(**kwargs)


class TextResponse(Response):
    encoding = "utf-8"

    @property
    def text(self):
        return self.body.decode(self.encoding)


class XmlResponse(TextResponse):
    pass
