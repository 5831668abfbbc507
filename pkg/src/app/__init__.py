"""qmdp - квантовые марковские процессы принятия решений: линейная алгебра, каналы, решатели."""
