import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rolenet.settings')
django.setup()
