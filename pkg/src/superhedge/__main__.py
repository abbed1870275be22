from superhedge.cli import main

main()
