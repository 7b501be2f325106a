from code import InteractiveConsole

# to avoid ^[[A nonsense when pressing up arrow
try:
    import readline  # noqa: F401
except ImportError:
    pass

from findability.accessibility import *
from findability.api import *
from findability.metrics import *
from findability.querygen import *
from findability.retrieval import *

BANNER = """
###########################################
# findability interactive console         #
###########################################
A Pipeline instance is defined (as 'pipeline'){loaded}.
Try: search(RetrievalModel.bm25(), index, ["some", "terms"], 10)
"""


def interact(pipeline, index_path=None):
    namespace = dict(globals())
    namespace["pipeline"] = pipeline
    loaded = ""
    if index_path:
        namespace["index"] = pipeline.load_index(index_path)
        loaded = " and the index is loaded (as 'index')"
    InteractiveConsole(locals=namespace).interact(banner=BANNER.format(loaded=loaded))
