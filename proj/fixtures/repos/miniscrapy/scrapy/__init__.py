"""
Scrapy - a web crawling and web scraping framework written for Python
"""

__version__ = "2.11.0"
