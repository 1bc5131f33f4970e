# Persistence for null tables and fetch audit logs
from database.models import (Base, FetchLog, NullQuantile, NullTableRecord,
                             create_tables, get_engine, get_session)

__all__ = ['Base', 'FetchLog', 'NullQuantile', 'NullTableRecord',
           'create_tables', 'get_engine', 'get_session']
