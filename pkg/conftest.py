import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "mean_dimension_lab.settings")
django.setup()
