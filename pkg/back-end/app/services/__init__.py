"""Service Layer"""