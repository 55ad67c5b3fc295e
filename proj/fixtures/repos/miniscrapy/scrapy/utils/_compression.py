_CHUNK_SIZE = 65536


class _DecompressionMaxSizeExceeded(ValueError):
    pass
