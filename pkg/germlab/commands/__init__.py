# Command packages initialization
