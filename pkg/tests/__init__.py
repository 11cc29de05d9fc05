# Tests for the fairpolicy package
