# farplan command line
