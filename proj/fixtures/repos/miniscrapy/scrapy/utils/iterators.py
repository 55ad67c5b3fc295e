import csv
import logging
import re
from io import StringIO

from scrapy.http import Response, TextResponse

logger = logging.getLogger(__name__)


def _body_or_str(obj, unicode=True):
    if isinstance(obj, Response):
        if not unicode:
            return obj.body
        if isinstance(obj, TextResponse):
            return obj.text
        return obj.body.decode("utf-8")
    if isinstance(obj, str):
        return obj if unicode else obj.encode("utf-8")
    return obj.decode("utf-8") if unicode else obj


def xmliter(obj, nodename):
    """Return an iterator of the nodes named `nodename` found in `obj`.

    Uses regular expressions, so it is fast but fragile.
    """
    nodename_patt = re.escape(nodename)

    HEADER_START_RE = re.compile(rf"^(.*?)<\s*{nodename_patt}(?:\s|>)", re.S)
    HEADER_END_RE = re.compile(rf"<\s*/{nodename_patt}\s*>", re.S)
    END_TAG_RE = re.compile(r"<\s*/([^\s>]+)\s*>", re.S)
    text = _body_or_str(obj)

    document_header_match = re.search(HEADER_START_RE, text)
    header_start = document_header_match.group(1) if document_header_match else ""
    header_end_idx = re.search(HEADER_END_RE, text)
    header_end = text[header_end_idx.end():] if header_end_idx else ""

    r = re.compile(rf"<{nodename_patt}[\s>].*?</{nodename_patt}>", re.DOTALL)
    for match in r.finditer(text):
        nodetext = (
            header_start
            + match.group()
            + "".join(END_TAG_RE.findall(header_end))
        )
        yield nodetext


def xmliter_lxml(obj, nodename, namespace=None, prefix="x"):
    reader = _StreamReader(obj)
    tag = f"{{{namespace}}}{nodename}" if namespace else nodename
    for node in reader.nodes(tag):
        yield node


class _StreamReader:
    def __init__(self, obj):
        self._text = _body_or_str(obj)

    def nodes(self, tag):
        start = f"<{tag}"
        end = f"</{tag}>"
        pos = self._text.find(start)
        while pos != -1:
            stop = self._text.find(end, pos)
            if stop == -1:
                return
            yield self._text[pos:stop + len(end)]
            pos = self._text.find(start, stop)


def csviter(obj, delimiter=None, headers=None, encoding=None, quotechar=None):
    lines = StringIO(_body_or_str(obj, unicode=True))
    kwargs = {}
    if delimiter:
        kwargs["delimiter"] = delimiter
    if quotechar:
        kwargs["quotechar"] = quotechar
    csv_r = csv.reader(lines, **kwargs)

    if not headers:
        try:
            headers = next(csv_r)
        except StopIteration:
            return

    for row in csv_r:
        if len(row) != len(headers):
            logger.warning(
                "ignoring row %(csvlnum)d (length: %(csvrow)d, should be: %(csvheader)d)",
                {"csvlnum": csv_r.line_num, "csvrow": len(row), "csvheader": len(headers)},
            )
            continue
        yield dict(zip(headers, row))
