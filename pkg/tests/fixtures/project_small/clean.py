def ok(x):
    return x + 1
