fn main() { println!("{}", floq::probe()); }
