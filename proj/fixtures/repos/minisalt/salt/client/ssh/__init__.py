"""
Create ssh executor system
"""
import logging
import os
import sys

import salt.defaults.exitcodes
from salt.defaults.exitcodes import EX_AGGREGATE, EX_OK

log = logging.getLogger(__name__)


def _exit(code=EX_OK, msg=None):
    if msg:
        log.error(msg)
    sys.exit(code)


class SSH:
    """
    Create an SSH execution system
    """

    ROSTER_UPDATE_FLAG = "#__needs_update"

    def __init__(self, opts):
        self.opts = opts
        self.targets = {}
        self.returners = {}
        self.cache_dir = opts.get("cachedir", "/var/cache/salt")

    def _prepare_cache(self):
        if not os.path.isdir(self.cache_dir):
            try:
                os.makedirs(self.cache_dir)
            except OSError:
                _exit(
                    code=salt.defaults.exitcodes.EX_CANTCREAT,
                    msg="Cannot create the cache directory {}".format(self.cache_dir),
                )

    def run(self):
        self._prepare_cache()
        failed = [tgt for tgt, ret in self.returners.items() if ret.get("retcode")]
        if failed:
            _exit(code=EX_AGGREGATE, msg="Some targets failed: {}".format(", ".join(failed)))
        return self.returners
