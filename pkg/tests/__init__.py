# Tests for the arrival-uncertainty package
