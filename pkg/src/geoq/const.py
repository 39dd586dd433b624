GEOQ_CSV_DIALECT = "geoq"
OUTPUT_ENV_VAR = "GEOQ_OUT"
FLOAT_FORMAT = ".17g"
