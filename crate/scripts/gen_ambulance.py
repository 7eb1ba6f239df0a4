"""Ambulance-call table with a planted antisyndrome: 35% men, 10% pregnant, never both."""

print("sex,pregnant,age,label")
for i in range(200):
    sex = "male" if i < 70 else "female"
    pregnant = "yes" if 70 <= i < 90 else "no"
    age = ["<30", "30-60", ">60"][i % 3]
    print(f"{sex},{pregnant},{age},ambulance")
