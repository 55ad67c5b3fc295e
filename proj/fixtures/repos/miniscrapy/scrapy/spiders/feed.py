from scrapy.spiders import Spider
from scrapy.utils.iterators import csviter, xmliter, xmliter_lxml


class XMLFeedSpider(Spider):
    iterator = "iternodes"
    itertag = "item"
    namespaces = ()

    def parse_node(self, response, selector):
        raise NotImplementedError("You must define parse_node method in order to scrape this XML feed")

    def parse_nodes(self, response, nodes):
        for selector in nodes:
            ret = self.parse_node(response, selector)
            yield from ret if isinstance(ret, list) else [ret]

    def _parse(self, response, **kwargs):
        if not hasattr(self, "parse_node"):
            raise NotImplementedError("You must define parse_node method in order to scrape this XML feed")

        if self.iterator == "iternodes":
            nodes = self._iternodes(response)
        elif self.iterator == "xml":
            nodes = xmliter(response, self.itertag)
        elif self.iterator == "html":
            nodes = xmliter(response, self.itertag)
        else:
            raise NotImplementedError("Unsupported node iterator")

        return self.parse_nodes(response, nodes)

    def _iternodes(self, response):
        for node in xmliter_lxml(response, self.itertag):
            yield node


class CSVFeedSpider(Spider):
    delimiter = None
    quotechar = None
    headers = None

    def parse_row(self, response, row):
        raise NotImplementedError

    def parse_rows(self, response):
        for row in csviter(response, self.delimiter, self.headers, quotechar=self.quotechar):
            yield self.parse_row(response, row)
