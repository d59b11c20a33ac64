from speamp.cli import main as main
from speamp.config import Config as Config
from speamp.config import load_config as load_config
from speamp.models import ProtocolParams as ProtocolParams
from speamp.protocol import run as run
