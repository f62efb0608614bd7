# Carleman ADR 数值研究包
