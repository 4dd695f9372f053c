fn main() { println!("ubs"); }
