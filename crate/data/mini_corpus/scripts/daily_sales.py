import pyspark.sql.functions as F

sales_df = spark.read.parquet('abfss://retail@lake.dfs.core.windows.net/raw/sales.parquet')

daily = sales_df.groupBy("store_id", "sale_date").agg(
    F.sum("net_amount").alias("total_net_amount"),
    F.count("sale_id").alias("sale_count"),
    F.max("net_amount").alias("largest_sale"),
    F.min("net_amount").alias("smallest_sale"),
    F.avg("net_amount").alias("average_sale"),
)

daily.write.mode('overwrite').parquet('abfss://retail@lake.dfs.core.windows.net/curated/daily_sales.parquet')
