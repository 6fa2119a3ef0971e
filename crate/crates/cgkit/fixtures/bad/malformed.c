//_connector:broken id
int x;
