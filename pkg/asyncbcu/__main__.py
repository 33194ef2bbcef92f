# Copyright 2026 The asyncbcu developers, MIT license

import sys

from asyncbcu.bench import main

sys.exit(main())
