import logging.config

from app import create_cli
from app.config import Config

logging.config.dictConfig(
    {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {"default": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"}},
        "handlers": {
            "stderr": {"class": "logging.StreamHandler", "formatter": "default", "stream": "ext://sys.stderr"},
        },
        "loggers": {"app": {"level": Config.LOG_LEVEL, "handlers": ["stderr"]}},
    }
)

logger = logging.getLogger(__name__)
application = create_cli()


def main():
    application()


if __name__ == "__main__":
    main()
