"""Entry point for varistab runs."""
import os

from varistab.cli import main

config_name = os.environ.get('VARISTAB_CONFIG', 'default')

if __name__ == '__main__':
    main(obj={'config_name': config_name})
