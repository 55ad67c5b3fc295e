from logging import getLogger

from scrapy.http import Response, TextResponse
from scrapy.utils._compression import _DecompressionMaxSizeExceeded
from scrapy.utils.gz import gunzip

logger = getLogger(__name__)

ACCEPTED_ENCODINGS = [b"gzip", b"deflate"]


class HttpCompressionMiddleware:
    """This middleware allows compressed (gzip, deflate) traffic to be
    sent/received from web sites"""

    def __init__(self, max_size=0, warn_size=0):
        self._max_size = max_size
        self._warn_size = warn_size

    def process_response(self, request, response, spider):
        if request.method == "HEAD":
            return response
        if isinstance(response, Response):
            content_encoding = response.headers.getlist("Content-Encoding")
            if content_encoding:
                max_size = request.meta.get("download_maxsize", self._max_size)
                try:
                    decoded_body = self._decode(response.body, content_encoding.pop().lower(), max_size)
                except _DecompressionMaxSizeExceeded:
                    raise ValueError(f"Ignoring response {response}: decompressed size exceeds {max_size} B")
                kwargs = dict(body=decoded_body)
                if not content_encoding:
                    del response.headers["Content-Encoding"]
                return response.replace(**kwargs)
        return response

    def _decode(self, body: bytes, encoding: bytes, max_size: int) -> bytes:
        if encoding == b"gzip" or encoding == b"x-gzip":
            return gunzip(body, max_size=max_size)
        return body
