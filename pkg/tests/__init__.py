"""Empty test init file"""
