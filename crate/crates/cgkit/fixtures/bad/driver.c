//_connector:driver
int main(void) {
  //_link:work
  return 0;
}
