from speamp.cli import main

raise SystemExit(main())
