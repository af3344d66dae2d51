"""The three monthly markets: goods, labor and housing."""
