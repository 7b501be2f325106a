from findability.manage import main

main()
